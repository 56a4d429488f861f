#include "ctis/error.hpp"

namespace ctis {

void throw_dimension(const std::string& what, std::size_t expected, std::size_t actual) {
  throw DimensionError(what + ": expected " + std::to_string(expected) + ", got " +
                       std::to_string(actual));
}

}  // namespace ctis
