#include "authorlink/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "authorlink/common.hpp"

namespace authorlink {

namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) != 0; }

bool starts_with_url(std::string_view t) {
    return t.rfind("http://", 0) == 0 || t.rfind("https://", 0) == 0 || t.rfind("www.", 0) == 0;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0, n = text.size();
    while (i < n) {
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < n && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) {
            std::string tok(text.substr(i, j - i));
            for (char& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (!starts_with_url(tok) && tok[0] != '@') {
                std::size_t b = 0, e = tok.size();
                if (b < e && tok[b] == '#') ++b;
                while (b < e && !is_word_char(static_cast<unsigned char>(tok[b]))) ++b;
                while (e > b && !is_word_char(static_cast<unsigned char>(tok[e - 1]))) --e;
                if (e > b) out.emplace_back(tok.substr(b, e - b));
            }
        }
        i = j;
    }
    return out;
}

MessageSet::MessageSet(std::vector<Message> msgs) : messages_(std::move(msgs)) {
    std::map<std::string, std::vector<std::size_t>> by_author;
    for (std::size_t i = 0; i < messages_.size(); ++i)
        by_author[messages_[i].author_id].push_back(i);
    authors_.reserve(by_author.size());
    for (auto& [id, idx] : by_author) {
        author_by_id_.emplace(id, authors_.size());
        authors_.push_back(AuthorRecord{id, std::move(idx)});
    }
}

std::optional<std::size_t> MessageSet::author_index(std::string_view id) const {
    auto it = author_by_id_.find(std::string(id));
    if (it == author_by_id_.end()) return std::nullopt;
    return it->second;
}

MessageSet load_messages(const std::filesystem::path& file, LoadReport* report) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open corpus file: " + file.string());
    LoadReport local;
    LoadReport& rep = report ? *report : local;
    std::vector<Message> msgs;
    std::unordered_map<std::string, bool> seen;
    std::string line;
    std::size_t lineno = 0;
    auto skip = [&](const std::string& why) {
        ++rep.skipped;
        if (rep.warnings.size() < 20)
            rep.warnings.push_back("line " + std::to_string(lineno) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            skip("malformed json");
            continue;
        }
        if (!j.contains("id") || !j.contains("author") || !j.contains("ts") ||
            !j.contains("text") || !j["id"].is_string() || !j["author"].is_string() ||
            !j["ts"].is_number_integer() || !j["text"].is_string()) {
            skip("missing or mistyped field");
            continue;
        }
        Message m;
        m.id = j["id"].get<std::string>();
        m.author_id = j["author"].get<std::string>();
        m.timestamp = j["ts"].get<std::int64_t>();
        if (m.timestamp < 0) {
            skip("negative timestamp");
            continue;
        }
        if (seen.count(m.id)) {
            skip("duplicate id " + m.id);
            continue;
        }
        seen.emplace(m.id, true);
        m.tokens = tokenize(j["text"].get<std::string>());
        msgs.push_back(std::move(m));
        ++rep.accepted;
    }
    return MessageSet(std::move(msgs));
}

MessageSet load_corpus_tsv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open corpus tsv: " + file.string());
    std::vector<Message> msgs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t p1 = line.find('\t');
        std::size_t p2 = line.find('\t', p1 + 1);
        std::size_t p3 = line.find('\t', p2 + 1);
        if (p1 == std::string::npos || p2 == std::string::npos || p3 == std::string::npos)
            throw DataError("bad corpus tsv row: " + line);
        Message m;
        m.id = line.substr(0, p1);
        m.author_id = line.substr(p1 + 1, p2 - p1 - 1);
        m.timestamp = stol_strict(std::string_view(line).substr(p2 + 1, p3 - p2 - 1), "ts");
        std::string toks = line.substr(p3 + 1);
        std::size_t i = 0;
        while (i < toks.size()) {
            std::size_t j = toks.find(' ', i);
            if (j == std::string::npos) j = toks.size();
            if (j > i) m.tokens.push_back(toks.substr(i, j - i));
            i = j + 1;
        }
        msgs.push_back(std::move(m));
    }
    return MessageSet(std::move(msgs));
}

void save_corpus_tsv(const MessageSet& set, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write corpus tsv: " + file.string());
    for (const Message& m : set.messages()) {
        out << m.id << '\t' << m.author_id << '\t' << m.timestamp << '\t';
        for (std::size_t i = 0; i < m.tokens.size(); ++i) {
            if (i) out << ' ';
            out << m.tokens[i];
        }
        out << '\n';
    }
}

Vocabulary Vocabulary::build(const MessageSet& set, std::size_t min_count, std::size_t max_terms) {
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const Message& m : set.messages())
        for (const std::string& t : m.tokens) ++counts[t];
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    kept.reserve(counts.size());
    for (auto& [t, c] : counts)
        if (c >= min_count) kept.emplace_back(t, c);
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (max_terms && kept.size() > max_terms) kept.resize(max_terms);
    Vocabulary v;
    v.terms_.reserve(kept.size());
    v.freqs_.reserve(kept.size());
    for (auto& [t, c] : kept) {
        v.terms_.push_back(t);
        v.freqs_.push_back(c);
    }
    v.reindex();
    return v;
}

void Vocabulary::reindex() {
    index_.clear();
    index_.reserve(terms_.size());
    for (std::size_t i = 0; i < terms_.size(); ++i) index_.emplace(terms_[i], i);
}

std::optional<std::size_t> Vocabulary::index(std::string_view term) const {
    auto it = index_.find(std::string(term));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void Vocabulary::save(const std::filesystem::path& file) const {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write vocabulary: " + file.string());
    for (std::size_t i = 0; i < terms_.size(); ++i)
        out << terms_[i] << '\t' << freqs_[i] << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open vocabulary: " + file.string());
    Vocabulary v;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t p = line.find('\t');
        if (p == std::string::npos) throw DataError("bad vocabulary row: " + line);
        v.terms_.push_back(line.substr(0, p));
        v.freqs_.push_back(
            static_cast<std::uint64_t>(stol_strict(std::string_view(line).substr(p + 1), "freq")));
    }
    v.reindex();
    return v;
}

}  // namespace authorlink
