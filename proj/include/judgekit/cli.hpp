#pragma once

#include <iosfwd>

namespace judgekit {

// Entry point shared by the binary and the tests. Exit codes: 0 success,
// 1 stage failure (machine-readable error JSON on err), 2 usage.
int dispatch(int argc, const char* const* argv, std::ostream& out,
             std::ostream& err);

}  // namespace judgekit
