#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace chesslm::text {

inline constexpr const char* kBeginOfText = "<|begin_of_text|>";
inline constexpr const char* kEndOfText = "<|end_of_text|>";
inline constexpr const char* kPad = "<|pad|>";

// Bijective symbol <-> id map with three reserved specials at ids 0..2.
// Symbols are single characters for the character-level scheme, or whole
// SAN strings for the move-level scheme used in CE comparisons.
class Vocabulary {
public:
    static constexpr int kBeginId = 0;
    static constexpr int kEndId = 1;
    static constexpr int kPadId = 2;

    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> symbols);

    int size() const { return static_cast<int>(symbols_.size()); }
    const std::string& symbol(int id) const;
    // Returns -1 when the symbol is unknown.
    int id_of(const std::string& symbol) const;
    int id_of_char(char c) const;

    // One symbol per line, line number = id, specials first.
    std::string to_text() const;
    static Vocabulary from_text(const std::string& text);

    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

    // FNV-1a hash of the persisted text form; checkpoints and manifests
    // reference vocabularies by this value.
    std::string content_hash() const;

private:
    std::vector<std::string> symbols_;
    std::unordered_map<std::string, int> ids_;
};

// Deterministic character-level vocabulary over a corpus sample: the three
// specials followed by the distinct characters in sorted order.
Vocabulary build_vocab(const std::vector<std::string>& corpus);

// Move-level vocabulary: one symbol per distinct SAN string.
Vocabulary build_move_vocab(const std::vector<std::string>& sans);

// One training/eval sample. `ids` is the full token stream. The loss mask
// `w` is aligned with prediction positions: w[t] = 1 means the model's
// output at position t is scored against ids[t+1] (a best-move token), so
// the masked targets are the span shifted one to the left of the span's
// token positions. Padding always carries w = 0 and attention_pad_mask = 0.
struct TokenSequence {
    std::vector<int> ids;
    std::vector<uint8_t> w;
    std::vector<uint8_t> attention_pad_mask;

    int length() const { return static_cast<int>(ids.size()); }
    int sum_w() const;
    // ids[t+1] for every t with w[t] = 1, i.e. the masked target tokens.
    std::vector<int> masked_targets() const;
};

// Replaces each digit d in the FEN placement field with d periods; the
// other five fields pass through untouched.
std::string flatten_fen(const std::string& fen);

// Inverse of flatten_fen: periods back to digit runs. Throws ParseError if
// the placement segment does not hold 64 symbols in 8 ranks.
std::string unflatten_fen(const std::string& flattened);

// Strict character-level encoding; one id per character, never a merge.
// Throws ParseError naming the position of the first unknown character.
std::vector<int> char_tokenize(const std::string& text, const Vocabulary& vocab);

// Inverse of char_tokenize; specials render as their marker strings.
std::string detokenize(const std::vector<int>& ids, const Vocabulary& vocab);

// Character-level encoding that additionally recognizes the special marker
// substrings ("<|begin_of_text|>" etc.) and maps each to its reserved id.
std::vector<int> tokenize_with_markers(const std::string& text, const Vocabulary& vocab);

// Appends pad ids up to target_len, extending both masks with zeros.
// Throws ParseError when the sequence is already longer than target_len;
// the caller decides whether to drop or truncate.
TokenSequence pad_sequence(const TokenSequence& seq, int target_len);

}  // namespace chesslm::text
