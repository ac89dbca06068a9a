#include "mvsel/cli.hpp"

int main(int argc, char** argv) { return mvsel::cli::main(argc, argv); }
