#pragma once

#include <stdexcept>
#include <string>

namespace patchhar {

// Malformed input text (unparseable JSON line, bad CSV cell). Message carries
// the 1-based line number where applicable.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structurally valid input that violates a declared contract (wrong sample
// count, label out of range, unknown sensor tag, bad checkpoint layout).
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A non-finite value was produced inside the numeric pipeline. The message
// names the stage (layer or parameter block) that produced it.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A window or request could not be matched to a loaded model.
struct RoutingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace patchhar
