#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace intopic {

using StopwordSet = std::unordered_set<std::string>;

/// Built-in English stopword list (lowercase).
StopwordSet const& default_stopwords();

/// One word per line; blank lines ignored, entries lowercased.
StopwordSet load_stopwords(std::filesystem::path const& path);

/// Lowercase ASCII, split on runs of non-alphanumeric bytes, keep tokens of
/// length >= 2 that are not all digits and not stopwords. Bytes >= 0x80 are
/// treated as word characters so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text, StopwordSet const& stopwords);
std::vector<std::string> tokenize(std::string_view text);

struct Document {
    std::string id;
    std::optional<std::string> title;
    std::string text;
    std::vector<std::string> tokens;
};

class Vocabulary {
  public:
    Vocabulary() = default;
    Vocabulary(std::vector<std::string> words, std::vector<double> doc_freq, StopwordSet stopwords = {});

    [[nodiscard]] std::size_t size() const noexcept { return m_words.size(); }
    [[nodiscard]] std::vector<std::string> const& words() const noexcept { return m_words; }
    [[nodiscard]] std::string const& word(std::size_t i) const { return m_words.at(i); }
    [[nodiscard]] std::vector<double> const& doc_freq() const noexcept { return m_doc_freq; }
    [[nodiscard]] StopwordSet const& stopwords() const noexcept { return m_stopwords; }
    [[nodiscard]] std::optional<int> index_of(std::string_view word) const;
    [[nodiscard]] bool contains(std::string_view word) const { return index_of(word).has_value(); }

  private:
    std::vector<std::string> m_words;
    std::vector<double> m_doc_freq;
    StopwordSet m_stopwords;
    std::unordered_map<std::string, int> m_index;
};

struct VocabularyOptions {
    double min_df = 0.01;
    double max_df = 0.85;
    StopwordSet stopwords = default_stopwords();
};

/// Fills `tokens` of every document from its text.
void tokenize_documents(std::vector<Document>& docs, StopwordSet const& stopwords);

/// Retains w iff it is not a stopword and min_df <= df(w) <= max_df.
/// Words come out sorted. Throws EmptyVocabularyError if nothing survives.
Vocabulary build_vocabulary(std::vector<Document> const& docs, VocabularyOptions const& options = {});

/// Drops out-of-vocabulary tokens from every document.
void restrict_to_vocabulary(std::vector<Document>& docs, Vocabulary const& vocab);

struct BowEntry {
    int word;
    int count;

    friend bool operator==(BowEntry const&, BowEntry const&) = default;
};

/// Sparse document row, entries sorted by word id.
using BowRow = std::vector<BowEntry>;

struct BowCorpus {
    Vocabulary vocab;
    std::vector<std::string> doc_ids;
    std::vector<BowRow> rows;
    std::vector<int> doc_lengths;

    [[nodiscard]] std::size_t num_docs() const noexcept { return rows.size(); }
    [[nodiscard]] std::size_t num_words() const noexcept { return vocab.size(); }
};

BowCorpus to_bow(std::vector<Document> const& docs, Vocabulary const& vocab);

/// Line-delimited JSON records with `id`, optional `title`, `text`.
std::vector<Document> load_corpus(std::filesystem::path const& path);
std::vector<Document> parse_corpus(std::istream& in);
void save_corpus(std::vector<Document> const& docs, std::filesystem::path const& path);

/// Vocabulary as `word<TAB>df` lines and rows as `doc_id<TAB>id:count ...`.
void save_bow(BowCorpus const& corpus, std::filesystem::path const& prefix);
BowCorpus load_bow(std::filesystem::path const& prefix);

}  // namespace intopic
