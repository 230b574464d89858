#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace authorlink {

struct Message {
    std::string id;
    std::string author_id;
    std::int64_t timestamp = 0;  // UTC epoch seconds
    std::vector<std::string> tokens;
};

struct AuthorRecord {
    std::string author_id;
    std::vector<std::size_t> message_indices;  // into MessageSet, file order
};

struct LoadReport {
    std::size_t accepted = 0;
    std::size_t skipped = 0;
    std::vector<std::string> warnings;  // first few skip reasons
};

// Normalizes raw text into tokens: lowercase ASCII, URLs and @-mentions
// dropped, '#' stripped from hashtags, punctuation trimmed from token edges,
// tokens that end up empty dropped. Idempotent over its own output.
std::vector<std::string> tokenize(std::string_view text);

// Immutable corpus: messages in file order plus per-author message lists.
// Authors are ordered by id so every downstream index is reproducible.
class MessageSet {
  public:
    MessageSet() = default;
    explicit MessageSet(std::vector<Message> msgs);

    const std::vector<Message>& messages() const { return messages_; }
    const std::vector<AuthorRecord>& authors() const { return authors_; }
    const Message& at(std::size_t i) const { return messages_[i]; }
    std::size_t size() const { return messages_.size(); }
    std::optional<std::size_t> author_index(std::string_view id) const;

  private:
    std::vector<Message> messages_;
    std::vector<AuthorRecord> authors_;
    std::unordered_map<std::string, std::size_t> author_by_id_;
};

// Reads a JSONL corpus ({"id","author","ts","text"} per line). Malformed
// lines, duplicate ids, and negative timestamps are skipped and counted.
MessageSet load_messages(const std::filesystem::path& file, LoadReport* report = nullptr);

// Like load_messages but takes pre-tokenized rows (id \t author \t ts \t tokens).
MessageSet load_corpus_tsv(const std::filesystem::path& file);
void save_corpus_tsv(const MessageSet& set, const std::filesystem::path& file);

// Terms ordered by descending corpus frequency, ties lexicographic.
class Vocabulary {
  public:
    Vocabulary() = default;

    static Vocabulary build(const MessageSet& set, std::size_t min_count,
                            std::size_t max_terms = 0);

    std::size_t size() const { return terms_.size(); }
    const std::string& term(std::size_t i) const { return terms_[i]; }
    const std::vector<std::string>& terms() const { return terms_; }
    std::uint64_t frequency(std::size_t i) const { return freqs_[i]; }
    std::optional<std::size_t> index(std::string_view term) const;
    bool contains(std::string_view term) const { return index(term).has_value(); }

    void save(const std::filesystem::path& file) const;
    static Vocabulary load(const std::filesystem::path& file);

  private:
    std::vector<std::string> terms_;
    std::vector<std::uint64_t> freqs_;
    std::unordered_map<std::string, std::size_t> index_;
    void reindex();
};

}  // namespace authorlink
