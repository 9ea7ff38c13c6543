#include "commands.hpp"

int main(int argc, char** argv) { return mbm::cli::run(argc, argv); }
