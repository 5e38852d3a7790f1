#pragma once

// Internal: backend singletons. Only crypto.cpp may include this header;
// everything else goes through crypto::backend().

#include "navsec/crypto.hpp"

namespace navsec::crypto::detail {

const Backend& real_backend();
const Backend& test_backend();

}  // namespace navsec::crypto::detail
