#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "conlearn/errors.hpp"

namespace conlearn::models {

/// Token <-> index bijection with PAD/BOS/EOS reserved at 0/1/2.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;

  explicit Vocab(const std::vector<std::string>& symbols) {
    for (const char* r : {"<pad>", "<bos>", "<eos>"}) push(r);
    for (const auto& s : symbols) push(s);
  }

  int id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) throw InputError("unknown token '" + std::string(token) + "'");
    return it->second;
  }

  const std::string& token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
      throw InputError("token id " + std::to_string(id) + " out of range");
    return tokens_[static_cast<std::size_t>(id)];
  }

  std::size_t size() const noexcept { return tokens_.size(); }

  /// One token per character.
  std::vector<int> encode_chars(std::string_view s) const {
    std::vector<int> out;
    out.reserve(s.size());
    for (char c : s) out.push_back(id(std::string(1, c)));
    return out;
  }

  std::string decode_chars(const std::vector<int>& ids) const {
    std::string out;
    for (int t : ids) {
      if (t == kPad || t == kBos || t == kEos) continue;
      out += token(t);
    }
    return out;
  }

 private:
  void push(const std::string& s) {
    if (index_.contains(s)) throw ContractViolation("duplicate vocabulary entry '" + s + "'");
    index_.emplace(s, static_cast<int>(tokens_.size()));
    tokens_.push_back(s);
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace conlearn::models
