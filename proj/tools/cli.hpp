#pragma once

#include <iosfwd>

namespace igbeat::cli {

// Entry point of the igbeat tool; returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace igbeat::cli
