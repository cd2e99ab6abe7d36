#include "reactgen/cli.hpp"

int main(int argc, char** argv) { return reactgen::cli::run(argc, argv); }
