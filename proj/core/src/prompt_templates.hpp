#pragma once

#include "accelmat/prompt_kit.hpp"

namespace accelmat::internal {

/// Verbatim template body bundled into the library.
const char* builtin_template(TemplateName name);

}  // namespace accelmat::internal
