#pragma once

#include <string>

#include "doctest.h"
#include "ember/error.hpp"

// Asserts that `expr` throws ember::Error with the given code.
#define CHECK_ERRC(expr, errc)                                                          \
  do {                                                                                  \
    try {                                                                               \
      (void)(expr);                                                                     \
      FAIL_CHECK("expected " << ember::errc_name(errc) << " from " #expr);              \
    } catch (const ember::Error& e_) {                                                  \
      CHECK_MESSAGE(e_.code() == (errc), "got " << ember::errc_name(e_.code()) << ": " \
                                                << e_.what());                          \
    }                                                                                   \
  } while (0)

namespace doctest {
template <>
struct StringMaker<ember::Errc> {
  static String convert(ember::Errc e) { return std::string(ember::errc_name(e)).c_str(); }
};
}  // namespace doctest
