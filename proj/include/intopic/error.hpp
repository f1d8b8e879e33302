#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace intopic {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input record; `line()` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
  public:
    ParseError(std::string const& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), m_line(line)
    {}
    [[nodiscard]] std::size_t line() const noexcept { return m_line; }

  private:
    std::size_t m_line;
};

class DuplicateIdError : public Error {
  public:
    explicit DuplicateIdError(std::string id)
        : Error("duplicate document id '" + id + "'"), m_id(std::move(id))
    {}
    [[nodiscard]] std::string const& id() const noexcept { return m_id; }

  private:
    std::string m_id;
};

/// Thresholds removed every word.
class EmptyVocabularyError : public Error {
  public:
    using Error::Error;
};

class DimensionError : public Error {
  public:
    using Error::Error;
};

class MissingWordsError : public Error {
  public:
    explicit MissingWordsError(std::vector<std::string> words);
    [[nodiscard]] std::vector<std::string> const& words() const noexcept { return m_words; }

  private:
    std::vector<std::string> m_words;
};

/// Checkpoint container is corrupt, truncated, or from another version.
class FormatError : public Error {
  public:
    using Error::Error;
};

class TrainingError : public Error {
  public:
    TrainingError(std::string const& what, int epoch, int batch)
        : Error(what + " (epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) + ")"),
          m_epoch(epoch),
          m_batch(batch)
    {}
    [[nodiscard]] int epoch() const noexcept { return m_epoch; }
    [[nodiscard]] int batch() const noexcept { return m_batch; }

  private:
    int m_epoch;
    int m_batch;
};

/// Label word is not part of the model vocabulary.
class OovWordError : public Error {
  public:
    explicit OovWordError(std::string word)
        : Error("word not in vocabulary: '" + word + "'"), m_word(std::move(word))
    {}
    [[nodiscard]] std::string const& word() const noexcept { return m_word; }

  private:
    std::string m_word;
};

/// Label word already names a different topic.
class DuplicateLabelError : public Error {
  public:
    DuplicateLabelError(std::string word, int topic)
        : Error("label '" + word + "' already used by topic " + std::to_string(topic)),
          m_word(std::move(word)),
          m_topic(topic)
    {}
    [[nodiscard]] int topic() const noexcept { return m_topic; }
    [[nodiscard]] std::string const& word() const noexcept { return m_word; }

  private:
    std::string m_word;
    int m_topic;
};

/// Request parameter outside its domain (lambda, delta, topic id, ...).
class InvalidArgument : public Error {
  public:
    using Error::Error;
};

class NotFoundError : public Error {
  public:
    using Error::Error;
};

class EmptyHistoryError : public Error {
  public:
    EmptyHistoryError() : Error("no earlier model version to restore") {}
};

}  // namespace intopic
