#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace mug {

using TokenId = std::uint32_t;

enum class Sentiment : std::uint8_t { kPositive = 0, kNegative = 1, kNeutral = 2 };

// Token span, both ends inclusive.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start + 1; }
  bool contains(std::size_t i) const { return start <= i && i <= end; }

  friend auto operator<=>(const Span&, const Span&) = default;
};

struct Triplet {
  Span aspect;
  Span opinion;
  Sentiment sentiment = Sentiment::kPositive;

  friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

std::string_view to_string(Sentiment s);
std::optional<Sentiment> parse_sentiment(std::string_view text);

}  // namespace mug
