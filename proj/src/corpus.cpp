#include "intopic/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "intopic/error.hpp"

namespace intopic {

StopwordSet const& default_stopwords()
{
    static StopwordSet const words = {
        "a",       "about",   "above",   "after",   "again",   "against", "all",     "am",
        "an",      "and",     "any",     "are",     "as",      "at",      "be",      "because",
        "been",    "before",  "being",   "below",   "between", "both",    "but",     "by",
        "can",     "could",   "did",     "do",      "does",    "doing",   "down",    "during",
        "each",    "few",     "for",     "from",    "further", "had",     "has",     "have",
        "having",  "he",      "her",     "here",    "hers",    "herself", "him",     "himself",
        "his",     "how",     "i",       "if",      "in",      "into",    "is",      "it",
        "its",     "itself",  "just",    "me",      "more",    "most",    "my",      "myself",
        "no",      "nor",     "not",     "now",     "of",      "off",     "on",      "once",
        "only",    "or",      "other",   "our",     "ours",    "ourselves", "out",   "over",
        "own",     "same",    "she",     "should",  "so",      "some",    "such",    "than",
        "that",    "the",     "their",   "theirs",  "them",    "themselves", "then", "there",
        "these",   "they",    "this",    "those",   "through", "to",      "too",     "under",
        "until",   "up",      "very",    "was",     "we",      "were",    "what",    "when",
        "where",   "which",   "while",   "who",     "whom",    "why",     "will",    "with",
        "would",   "you",     "your",    "yours",   "yourself", "yourselves", "also", "among",
        "may",     "might",   "must",    "shall",   "upon",    "yet",     "whose",   "within",
        "without", "across",  "along",   "around",  "however", "many",    "much",    "per",
        "said",    "says",    "us",      "via",     "whether", "s",       "t",       "don",
    };
    return words;
}

StopwordSet load_stopwords(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open stopword file " + path.string());
    }
    StopwordSet out;
    std::string line;
    while (std::getline(in, line)) {
        auto first = line.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) {
            continue;
        }
        auto last = line.find_last_not_of(" \t\r\n");
        std::string word = line.substr(first, last - first + 1);
        std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) {
            return static_cast<char>(std::tolower(c));
        });
        out.insert(std::move(word));
    }
    return out;
}

namespace {

bool is_word_byte(unsigned char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, StopwordSet const& stopwords)
{
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        bool digits_only = std::all_of(cur.begin(), cur.end(), [](unsigned char c) {
            return c >= '0' && c <= '9';
        });
        if (cur.size() >= 2 && !digits_only && !stopwords.contains(cur)) {
            out.push_back(cur);
        }
        cur.clear();
    };
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (is_word_byte(c)) {
            cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
        } else if (!cur.empty()) {
            flush();
        }
    }
    if (!cur.empty()) {
        flush();
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view text) { return tokenize(text, default_stopwords()); }

Vocabulary::Vocabulary(std::vector<std::string> words, std::vector<double> doc_freq, StopwordSet stopwords)
    : m_words(std::move(words)), m_doc_freq(std::move(doc_freq)), m_stopwords(std::move(stopwords))
{
    if (m_doc_freq.empty()) {
        m_doc_freq.assign(m_words.size(), 0.0);
    }
    if (m_doc_freq.size() != m_words.size()) {
        throw InvalidArgument("vocabulary: word and doc_freq lengths differ");
    }
    m_index.reserve(m_words.size());
    for (std::size_t i = 0; i < m_words.size(); ++i) {
        if (!m_index.emplace(m_words[i], static_cast<int>(i)).second) {
            throw InvalidArgument("vocabulary: duplicate word '" + m_words[i] + "'");
        }
    }
}

std::optional<int> Vocabulary::index_of(std::string_view word) const
{
    auto it = m_index.find(std::string(word));
    if (it == m_index.end()) {
        return std::nullopt;
    }
    return it->second;
}

void tokenize_documents(std::vector<Document>& docs, StopwordSet const& stopwords)
{
    for (auto& doc : docs) {
        doc.tokens = tokenize(doc.text, stopwords);
    }
}

Vocabulary build_vocabulary(std::vector<Document> const& docs, VocabularyOptions const& options)
{
    if (docs.empty()) {
        throw InvalidArgument("build_vocabulary: no documents");
    }
    // std::map keeps the retained words in lexicographic order.
    std::map<std::string, int> df;
    for (auto const& doc : docs) {
        std::vector<std::string> uniq(doc.tokens.begin(), doc.tokens.end());
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        for (auto& w : uniq) {
            ++df[w];
        }
    }
    auto const n = static_cast<double>(docs.size());
    std::vector<std::string> words;
    std::vector<double> freqs;
    for (auto const& [word, count] : df) {
        double f = count / n;
        if (options.stopwords.contains(word)) {
            continue;
        }
        if (f < options.min_df || f > options.max_df) {
            continue;
        }
        words.push_back(word);
        freqs.push_back(f);
    }
    if (words.empty()) {
        throw EmptyVocabularyError("document-frequency thresholds removed every word");
    }
    return Vocabulary(std::move(words), std::move(freqs), options.stopwords);
}

void restrict_to_vocabulary(std::vector<Document>& docs, Vocabulary const& vocab)
{
    for (auto& doc : docs) {
        std::erase_if(doc.tokens, [&](std::string const& t) { return !vocab.contains(t); });
    }
}

BowCorpus to_bow(std::vector<Document> const& docs, Vocabulary const& vocab)
{
    BowCorpus out;
    out.vocab = vocab;
    out.doc_ids.reserve(docs.size());
    out.rows.reserve(docs.size());
    out.doc_lengths.reserve(docs.size());
    for (auto const& doc : docs) {
        std::map<int, int> counts;
        for (auto const& t : doc.tokens) {
            if (auto id = vocab.index_of(t)) {
                ++counts[*id];
            }
        }
        BowRow row;
        int total = 0;
        for (auto [w, c] : counts) {
            row.push_back({w, c});
            total += c;
        }
        out.doc_ids.push_back(doc.id);
        out.rows.push_back(std::move(row));
        out.doc_lengths.push_back(total);
    }
    return out;
}

std::vector<Document> parse_corpus(std::istream& in)
{
    std::vector<Document> docs;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (nlohmann::json::parse_error const& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
        }
        if (!rec.is_object()) {
            throw ParseError("record is not an object", lineno);
        }
        auto id = rec.find("id");
        if (id == rec.end() || !id->is_string()) {
            throw ParseError("missing string field 'id'", lineno);
        }
        auto text = rec.find("text");
        if (text == rec.end() || !text->is_string()) {
            throw ParseError("missing string field 'text'", lineno);
        }
        Document doc;
        doc.id = id->get<std::string>();
        doc.text = text->get<std::string>();
        if (auto title = rec.find("title"); title != rec.end() && !title->is_null()) {
            if (!title->is_string()) {
                throw ParseError("field 'title' is not a string", lineno);
            }
            doc.title = title->get<std::string>();
        }
        if (!seen.insert(doc.id).second) {
            throw DuplicateIdError(doc.id);
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

std::vector<Document> load_corpus(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open corpus file " + path.string());
    }
    return parse_corpus(in);
}

void save_corpus(std::vector<Document> const& docs, std::filesystem::path const& path)
{
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write corpus file " + path.string());
    }
    for (auto const& doc : docs) {
        nlohmann::json rec = {{"id", doc.id}};
        if (doc.title) {
            rec["title"] = *doc.title;
        }
        rec["text"] = doc.text;
        out << rec.dump() << '\n';
    }
}

namespace {

std::filesystem::path with_suffix(std::filesystem::path const& prefix, char const* suffix)
{
    return std::filesystem::path(prefix.string() + suffix);
}

}  // namespace

void save_bow(BowCorpus const& corpus, std::filesystem::path const& prefix)
{
    std::ofstream vocab(with_suffix(prefix, ".vocab"));
    std::ofstream bow(with_suffix(prefix, ".bow"));
    if (!vocab || !bow) {
        throw Error("cannot write bag-of-words artifacts at " + prefix.string());
    }
    vocab.precision(17);
    for (std::size_t i = 0; i < corpus.vocab.size(); ++i) {
        vocab << corpus.vocab.word(i) << '\t' << corpus.vocab.doc_freq()[i] << '\n';
    }
    for (std::size_t d = 0; d < corpus.num_docs(); ++d) {
        bow << corpus.doc_ids[d];
        for (auto [w, c] : corpus.rows[d]) {
            bow << '\t' << w << ':' << c;
        }
        bow << '\n';
    }
}

BowCorpus load_bow(std::filesystem::path const& prefix)
{
    std::ifstream vocab_in(with_suffix(prefix, ".vocab"));
    std::ifstream bow_in(with_suffix(prefix, ".bow"));
    if (!vocab_in || !bow_in) {
        throw Error("cannot read bag-of-words artifacts at " + prefix.string());
    }
    std::vector<std::string> words;
    std::vector<double> dfs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(vocab_in, line)) {
        ++lineno;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError("vocabulary line lacks a tab", lineno);
        }
        words.push_back(line.substr(0, tab));
        try {
            dfs.push_back(std::stod(line.substr(tab + 1)));
        } catch (std::exception const&) {
            throw ParseError("bad document frequency", lineno);
        }
    }
    BowCorpus out;
    out.vocab = Vocabulary(std::move(words), std::move(dfs));
    lineno = 0;
    while (std::getline(bow_in, line)) {
        ++lineno;
        std::istringstream fields(line);
        std::string id;
        std::getline(fields, id, '\t');
        BowRow row;
        int total = 0;
        std::string cell;
        while (std::getline(fields, cell, '\t')) {
            auto colon = cell.find(':');
            if (colon == std::string::npos) {
                throw ParseError("bad bag-of-words cell '" + cell + "'", lineno);
            }
            BowEntry e{};
            try {
                e.word = std::stoi(cell.substr(0, colon));
                e.count = std::stoi(cell.substr(colon + 1));
            } catch (std::exception const&) {
                throw ParseError("bad bag-of-words cell '" + cell + "'", lineno);
            }
            if (e.word < 0 || static_cast<std::size_t>(e.word) >= out.vocab.size() || e.count < 0) {
                throw ParseError("bag-of-words cell out of range '" + cell + "'", lineno);
            }
            total += e.count;
            row.push_back(e);
        }
        out.doc_ids.push_back(std::move(id));
        out.rows.push_back(std::move(row));
        out.doc_lengths.push_back(total);
    }
    return out;
}

}  // namespace intopic
