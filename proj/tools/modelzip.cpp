#include "modelzip/cli.hpp"

int main(int argc, char** argv) { return modelzip::cli::run(argc, argv); }
