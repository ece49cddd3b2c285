#include "rfkpca/cli.hpp"

int main(int argc, char** argv) { return rfkpca::cli_main(argc, argv); }
