#include "mvngb/commands.hpp"

int main(int argc, char** argv) { return mvngb::cli::run(argc, argv); }
