#include "handkin/common.hpp"

namespace handkin {

Domain parse_domain(const std::string& s) {
  if (s == "source") return Domain::source;
  if (s == "sensor") return Domain::sensor;
  throw Error("unknown domain '" + s + "' (expected source or sensor)");
}

}  // namespace handkin
