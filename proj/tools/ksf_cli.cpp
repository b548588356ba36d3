#include "ksf/cli.hpp"

int main(int argc, char** argv) { return ksf::cli::main(argc, argv); }
