#pragma once

#include <json.hpp>

namespace papertalk {

// Insertion-ordered JSON; every serialized payload keeps a stable field order.
using Json = nlohmann::ordered_json;

}  // namespace papertalk
