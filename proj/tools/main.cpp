#include "cli.hpp"

int main(int argc, char** argv) { return nngpiu::cli::main_entry(argc, argv); }
