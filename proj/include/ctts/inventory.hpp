#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctts/common.hpp"

namespace ctts {

// Reserved token ids, identical for graphemes and phonemes.
inline constexpr int32_t kPadId = 0;
inline constexpr int32_t kBosId = 1;
inline constexpr int32_t kEosId = 2;
inline constexpr int32_t kUnkId = 3;

inline constexpr const char* kSpecialTokens[4] = {"<pad>", "<bos>", "<eos>", "<unk>"};

// Token spelling <-> id table. Ids are dense, id = position in `tokens`.
class TokenInventory {
public:
    TokenInventory() = default;
    explicit TokenInventory(std::vector<std::string> tokens);

    int32_t size() const { return static_cast<int32_t>(tokens_.size()); }
    const std::string& token(int32_t id) const;
    // Returns kUnkId when the spelling is not in the table.
    int32_t id_of(const std::string& token) const;
    bool contains(const std::string& token) const { return lookup_.count(token) > 0; }
    const std::vector<std::string>& tokens() const { return tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int32_t> lookup_;
};

// One token spelling per line, id = zero-based line number. The first four
// lines must be the reserved specials in order.
TokenInventory load_inventory(const std::string& path);
void save_inventory(const std::string& path, const TokenInventory& inv);

// Built-in inventories used by the random-init presets. Both are
// deterministic functions of the requested size (>= 5).
TokenInventory make_grapheme_inventory(int32_t size);
TokenInventory make_phoneme_inventory(int32_t size);

// Splits UTF-8 text into single-character tokens. Bytes that do not form a
// valid sequence are passed through one byte at a time (they then map to
// <unk> like any other out-of-inventory character).
std::vector<std::string> utf8_chars(const std::string& text);

// Character tokenizer: [<bos>, char ids..., <eos>].
std::vector<int32_t> tokenize(const std::string& text, const TokenInventory& inv);

}  // namespace ctts
