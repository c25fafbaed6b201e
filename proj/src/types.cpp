#include "mug/types.h"

namespace mug {

std::string_view to_string(Sentiment s) {
  switch (s) {
    case Sentiment::kPositive: return "POS";
    case Sentiment::kNegative: return "NEG";
    case Sentiment::kNeutral: return "NEU";
  }
  return "?";
}

std::optional<Sentiment> parse_sentiment(std::string_view text) {
  if (text == "POS") return Sentiment::kPositive;
  if (text == "NEG") return Sentiment::kNegative;
  if (text == "NEU") return Sentiment::kNeutral;
  return std::nullopt;
}

}  // namespace mug
