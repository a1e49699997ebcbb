#include "commands.h"

int main(int argc, char** argv) { return posesync::cli::Run(argc, argv); }
