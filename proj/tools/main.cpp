#include "gmsm/cli.hpp"

int main(int argc, char** argv) { return gmsm::cli::main(argc, argv); }
