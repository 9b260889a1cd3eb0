#include "cli.hpp"

int main(int argc, char** argv) { return fibrefix::cli::run(argc, argv); }
