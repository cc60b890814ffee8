#include "guikit/cli.hpp"

int main(int argc, char** argv) { return guikit::cli::run(argc, argv); }
