#include "coad/cli.hpp"

int main(int argc, char** argv) { return coad::cli::run(argc, argv); }
