#include "plangan/core/rng.h"

#include <sstream>

#include "plangan/core/errors.h"

namespace plangan {

std::string Rng::Serialize() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

Rng Rng::Deserialize(const std::string& text) {
  Rng rng;
  std::istringstream in(text);
  in >> rng.engine_;
  if (in.fail()) throw IoError("malformed rng state");
  return rng;
}

}  // namespace plangan
