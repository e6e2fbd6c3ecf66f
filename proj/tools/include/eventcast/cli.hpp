#pragma once

namespace eventcast {

/// Exit codes: 0 ok, 1 usage or other error, 2 unreadable input,
/// 3 schema failure budget exceeded, 4 missing upstream artifact.
int run_cli(int argc, const char* const* argv);

}  // namespace eventcast
