#include "serl/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstring>
#include <stdexcept>

namespace serl {

namespace {
std::string to_hex(const unsigned char* md, unsigned int len) {
    static const char* digits = "0123456789abcdef";
    std::string out(2 * len, '0');
    for (unsigned int i = 0; i < len; ++i) {
        out[2 * i] = digits[md[i] >> 4];
        out[2 * i + 1] = digits[md[i] & 0xF];
    }
    return out;
}
}  // namespace

ParamDigest ParamDigest::of_bytes(const void* data, std::size_t len) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int md_len = 0;
    if (EVP_Digest(data, len, md.data(), &md_len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 digest failed");
    }
    ParamDigest d;
    d.hex_ = to_hex(md.data(), md_len);
    return d;
}

ParamDigest ParamDigest::of(const std::vector<const std::vector<double>*>& arrays) {
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("sha256 init failed");
    }
    for (const auto* arr : arrays) {
        if (!arr->empty()) {
            EVP_DigestUpdate(ctx, arr->data(), arr->size() * sizeof(double));
        }
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int md_len = 0;
    EVP_DigestFinal_ex(ctx, md.data(), &md_len);
    EVP_MD_CTX_free(ctx);
    ParamDigest d;
    d.hex_ = to_hex(md.data(), md_len);
    return d;
}

}  // namespace serl
