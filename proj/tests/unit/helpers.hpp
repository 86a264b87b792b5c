#pragma once

#include <functional>

#include "tbqkd/error.hpp"

namespace testing {

// Category of the tbqkd::Error thrown by f, or nullopt-like sentinel -1 when
// nothing (or something else) was thrown.
inline int thrown_category(const std::function<void()>& f) {
  try {
    f();
  } catch (const tbqkd::Error& e) {
    return static_cast<int>(e.category());
  } catch (...) {
    return -2;
  }
  return -1;
}

inline int category(tbqkd::ErrorCategory c) { return static_cast<int>(c); }

}  // namespace testing

#define CHECK_THROWS_CATEGORY(expr, cat) \
  CHECK(::testing::thrown_category([&] { (void)(expr); }) == ::testing::category(cat))
