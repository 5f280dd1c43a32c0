#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "actseq/common.hpp"

namespace actseq {

// Ordered action symbol set with a bijective symbol <-> index map.
class ActionVocabulary {
 public:
  ActionVocabulary() = default;
  explicit ActionVocabulary(std::vector<std::string> symbols)
      : symbols_(std::move(symbols)) {
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      for (std::size_t j = i + 1; j < symbols_.size(); ++j) {
        if (symbols_[i] == symbols_[j]) {
          throw DataError("vocabulary: duplicate symbol '" + symbols_[i] + "'");
        }
      }
    }
  }

  int size() const { return static_cast<int>(symbols_.size()); }

  const std::string& symbol(int index) const {
    if (index < 0 || index >= size()) {
      throw std::invalid_argument("vocabulary: index out of range");
    }
    return symbols_[static_cast<std::size_t>(index)];
  }

  int index(const std::string& symbol) const {
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      if (symbols_[i] == symbol) return static_cast<int>(i);
    }
    return -1;
  }

  int require(const std::string& symbol) const {
    const int i = index(symbol);
    if (i < 0) throw DataError("unknown label '" + symbol + "'");
    return i;
  }

  const std::vector<std::string>& symbols() const { return symbols_; }

  bool operator==(const ActionVocabulary&) const = default;

 private:
  std::vector<std::string> symbols_;
};

}  // namespace actseq
