#include "cli.hpp"

int main(int argc, char** argv) { return qaf2d::cli::run(argc, argv); }
