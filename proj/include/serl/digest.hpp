#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace serl {

// SHA-256 over raw little-endian bytes of double arrays. Equal digests
// mean bit-identical parameters.
class ParamDigest {
  public:
    ParamDigest() = default;

    static ParamDigest of(const std::vector<const std::vector<double>*>& arrays);
    static ParamDigest of_bytes(const void* data, std::size_t len);

    const std::string& hex() const { return hex_; }
    bool operator==(const ParamDigest& other) const { return hex_ == other.hex_; }
    bool operator!=(const ParamDigest& other) const { return hex_ != other.hex_; }

  private:
    std::string hex_;
};

}  // namespace serl
