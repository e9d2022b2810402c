#include "tv/cli.hpp"

int main(int argc, char** argv) { return tv::cli::run(argc, argv); }
