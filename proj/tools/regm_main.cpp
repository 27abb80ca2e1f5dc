#include "regm/cli.hpp"

int main(int argc, char** argv) { return regm::cli::main(argc, argv); }
