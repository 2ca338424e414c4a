#include "mdt/cli.hpp"

int main(int argc, char** argv) { return mdt::cli::run(argc, argv); }
