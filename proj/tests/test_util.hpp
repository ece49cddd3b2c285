#pragma once

#include <gtest/gtest.h>

#include <functional>

#include "rfkpca/error.hpp"

// Kind of the rfkpca::Error thrown by f; records a failure if f returns.
inline rfkpca::ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const rfkpca::Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return rfkpca::ErrorKind::input;
}
