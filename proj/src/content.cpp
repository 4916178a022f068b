#include "genckpt/content.hpp"

#include <cstring>
#include <random>

#include "genckpt/digest.hpp"

namespace genckpt {

std::vector<std::byte> pattern_bytes(std::uint64_t seed, std::string_view tag, std::size_t size) {
  Hasher h;
  h.update(std::as_bytes(std::span(&seed, 1)));
  h.update(std::as_bytes(std::span(tag.data(), tag.size())));
  Digest d = h.finish();
  std::uint64_t s;
  std::memcpy(&s, d.bytes.data(), sizeof(s));

  std::vector<std::byte> out(size);
  std::mt19937_64 rng(s);
  std::size_t i = 0;
  for (; i + 8 <= size; i += 8) {
    std::uint64_t w = rng();
    std::memcpy(out.data() + i, &w, 8);
  }
  if (i < size) {
    std::uint64_t w = rng();
    std::memcpy(out.data() + i, &w, size - i);
  }
  return out;
}

}  // namespace genckpt
