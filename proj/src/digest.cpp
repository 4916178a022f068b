#include "genckpt/digest.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <stdexcept>

namespace genckpt {

std::string Digest::hex() const {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (std::uint8_t b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

Digest Digest::from_hex(const std::string& hex) {
  if (hex.size() != 64) throw std::invalid_argument("digest hex must be 64 chars");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("bad hex digit in digest");
  };
  Digest d;
  for (size_t i = 0; i < 32; ++i)
    d.bytes[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return d;
}

struct Hasher::Impl {
  EVP_MD_CTX* ctx = nullptr;
};

Hasher::Hasher() : impl_(std::make_unique<Impl>()) {
  impl_->ctx = EVP_MD_CTX_new();
  if (!impl_->ctx || EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("EVP_DigestInit_ex failed");
}

Hasher::~Hasher() {
  if (impl_ && impl_->ctx) EVP_MD_CTX_free(impl_->ctx);
}

void Hasher::update(std::span<const std::byte> chunk) {
  if (EVP_DigestUpdate(impl_->ctx, chunk.data(), chunk.size()) != 1)
    throw std::runtime_error("EVP_DigestUpdate failed");
}

Digest Hasher::finish() {
  Digest d;
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(impl_->ctx, d.bytes.data(), &len) != 1 || len != 32)
    throw std::runtime_error("EVP_DigestFinal_ex failed");
  return d;
}

Digest sha256(std::span<const std::byte> data) {
  Hasher h;
  h.update(data);
  return h.finish();
}

Digest sha256(std::string_view data) {
  return sha256(std::as_bytes(std::span(data.data(), data.size())));
}

}  // namespace genckpt
