#include "ctts/inventory.hpp"

#include <fstream>

namespace ctts {

TokenInventory::TokenInventory(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    if (tokens_.size() < 5) throw ArgumentError("inventory needs the 4 specials plus content");
    for (int i = 0; i < 4; ++i) {
        if (tokens_[i] != kSpecialTokens[i]) {
            throw ArgumentError("inventory line " + std::to_string(i) + " must be " +
                                kSpecialTokens[i] + ", got '" + tokens_[i] + "'");
        }
    }
    lookup_.reserve(tokens_.size());
    for (size_t i = 0; i < tokens_.size(); ++i) {
        if (tokens_[i].empty()) throw ArgumentError("empty token at line " + std::to_string(i));
        auto [it, fresh] = lookup_.emplace(tokens_[i], static_cast<int32_t>(i));
        if (!fresh) throw ArgumentError("duplicate token '" + tokens_[i] + "'");
    }
}

const std::string& TokenInventory::token(int32_t id) const {
    if (id < 0 || id >= size()) {
        throw IndexError("token id " + std::to_string(id) + " outside inventory of " +
                         std::to_string(size()));
    }
    return tokens_[id];
}

int32_t TokenInventory::id_of(const std::string& token) const {
    auto it = lookup_.find(token);
    return it == lookup_.end() ? kUnkId : it->second;
}

TokenInventory load_inventory(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open inventory file: " + path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        tokens.push_back(line);
    }
    // A trailing newline is expected; getline already drops it. An empty
    // final line only appears for a double newline, which the constructor
    // rejects as an empty token.
    return TokenInventory(std::move(tokens));
}

void save_inventory(const std::string& path, const TokenInventory& inv) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write inventory file: " + path);
    for (const auto& t : inv.tokens()) out << t << '\n';
    if (!out) throw IoError("short write to inventory file: " + path);
}

namespace {

void append_utf8(std::string& out, uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool skip_codepoint(uint32_t cp) {
    if (cp == 0x7F) return true;                   // DEL
    if (cp >= 0x80 && cp <= 0x9F) return true;     // C1 controls
    if (cp >= 0xD800 && cp <= 0xDFFF) return true; // surrogates
    return false;
}

}  // namespace

TokenInventory make_grapheme_inventory(int32_t size) {
    if (size < 5) throw ArgumentError("grapheme inventory size must be >= 5");
    std::vector<std::string> tokens(kSpecialTokens, kSpecialTokens + 4);
    // Consecutive printable code points from U+0020 upward. The release size
    // runs well into the CJK block, which is what gives the character table
    // its multilingual coverage.
    uint32_t cp = 0x20;
    while (static_cast<int32_t>(tokens.size()) < size) {
        if (!skip_codepoint(cp)) {
            std::string t;
            append_utf8(t, cp);
            tokens.push_back(std::move(t));
        }
        ++cp;
    }
    return TokenInventory(std::move(tokens));
}

TokenInventory make_phoneme_inventory(int32_t size) {
    if (size < 5) throw ArgumentError("phoneme inventory size must be >= 5");
    static const char* kBase[] = {
        "sil", "sp",
        "AA0", "AA1", "AA2", "AE0", "AE1", "AE2", "AH0", "AH1", "AH2",
        "AO0", "AO1", "AO2", "AW0", "AW1", "AW2", "AY0", "AY1", "AY2",
        "B", "CH", "D", "DH",
        "EH0", "EH1", "EH2", "ER0", "ER1", "ER2", "EY0", "EY1", "EY2",
        "F", "G", "HH",
        "IH0", "IH1", "IH2", "IY0", "IY1", "IY2",
        "JH", "K", "L", "M", "N", "NG",
        "OW0", "OW1", "OW2", "OY0", "OY1", "OY2",
        "P", "R", "S", "SH", "T", "TH",
        "UH0", "UH1", "UH2", "UW0", "UW1", "UW2",
        "V", "W", "Y", "Z", "ZH",
    };
    std::vector<std::string> tokens(kSpecialTokens, kSpecialTokens + 4);
    for (const char* t : kBase) {
        if (static_cast<int32_t>(tokens.size()) >= size) break;
        tokens.push_back(t);
    }
    // Numbered fillers pad multilingual extension space out to the table size.
    for (int i = 0; static_cast<int32_t>(tokens.size()) < size; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "xp%03d", i);
        tokens.push_back(buf);
    }
    return TokenInventory(std::move(tokens));
}

std::vector<std::string> utf8_chars(const std::string& text) {
    std::vector<std::string> out;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        unsigned char b = static_cast<unsigned char>(text[i]);
        size_t len = 1;
        if (b >= 0xF0)
            len = 4;
        else if (b >= 0xE0)
            len = 3;
        else if (b >= 0xC0)
            len = 2;
        bool ok = i + len <= n;
        for (size_t k = 1; ok && k < len; ++k) {
            unsigned char c = static_cast<unsigned char>(text[i + k]);
            ok = (c & 0xC0) == 0x80;
        }
        if (!ok) len = 1;
        out.emplace_back(text, i, len);
        i += len;
    }
    return out;
}

std::vector<int32_t> tokenize(const std::string& text, const TokenInventory& inv) {
    std::vector<int32_t> ids;
    std::vector<std::string> chars = utf8_chars(text);
    ids.reserve(chars.size() + 2);
    ids.push_back(kBosId);
    for (const auto& c : chars) ids.push_back(inv.id_of(c));
    ids.push_back(kEosId);
    return ids;
}

}  // namespace ctts
