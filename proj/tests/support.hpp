#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "intopic/corpus.hpp"
#include "intopic/embeddings.hpp"
#include "intopic/etm.hpp"
#include "intopic/synthetic.hpp"

namespace support {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    explicit TempDir(std::string const& tag)
    {
        std::random_device rd;
        m_path = std::filesystem::temp_directory_path() / ("intopic_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(m_path);
    }
    ~TempDir() { std::filesystem::remove_all(m_path); }
    TempDir(TempDir const&) = delete;
    TempDir& operator=(TempDir const&) = delete;

    [[nodiscard]] std::filesystem::path const& path() const { return m_path; }
    [[nodiscard]] std::filesystem::path operator/(std::string const& name) const { return m_path / name; }

  private:
    std::filesystem::path m_path;
};

inline intopic::Document doc(std::string id, std::string text)
{
    intopic::Document d;
    d.id = std::move(id);
    d.text = std::move(text);
    return d;
}

/// Bag of words over every token of the given docs (no df filtering).
inline intopic::BowCorpus bow_all(std::vector<intopic::Document> docs)
{
    intopic::VocabularyOptions opts;
    opts.min_df = 0.0;
    opts.max_df = 1.0;
    intopic::tokenize_documents(docs, opts.stopwords);
    auto vocab = intopic::build_vocabulary(docs, opts);
    return intopic::to_bow(docs, vocab);
}

struct Planted {
    intopic::SyntheticCorpus synth;
    intopic::BowCorpus bow;
    intopic::EmbeddingTable table;
    intopic::Matrix rho;
};

/// Planted corpus mapped onto its full generated vocabulary.
inline Planted planted(intopic::SyntheticOptions opts, int dim, double spread = 0.5,
                       double norm = intopic::kPlantedNorm)
{
    Planted p;
    p.synth = intopic::generate_synthetic_corpus(opts);
    p.bow = bow_all(p.synth.documents);
    p.table = intopic::planted_embeddings(p.synth, dim, spread, opts.seed + 1, norm);
    p.rho = intopic::align_to_vocabulary(p.table, p.bow.vocab, intopic::MissingPolicy::error());
    return p;
}

}  // namespace support
