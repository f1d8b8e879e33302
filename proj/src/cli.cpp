#include "intopic/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>

#include <CLI11.hpp>

#include "intopic/checkpoint.hpp"
#include "intopic/config.hpp"
#include "intopic/corpus.hpp"
#include "intopic/embeddings.hpp"
#include "intopic/error.hpp"
#include "intopic/etm.hpp"
#include "intopic/eval.hpp"
#include "intopic/interact.hpp"
#include "intopic/serialize.hpp"
#include "intopic/service.hpp"
#include "intopic/synthetic.hpp"

namespace intopic {

namespace {

struct Common {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> config;
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("--seed", c.seed, "Random seed");
    cmd->add_option("--config", c.config, "Config file (falls back to $INTOPIC_CONFIG)");
}

EtmConfig base_config(Common const& c, EtmConfig base = {})
{
    std::optional<std::filesystem::path> explicit_path;
    if (c.config) {
        explicit_path = *c.config;
    }
    if (auto path = resolve_config_path(explicit_path)) {
        base = load_config(*path, base);
    }
    if (c.seed) {
        base.seed = *c.seed;
    }
    return base;
}

struct SynthArgs {
    Common common;
    std::string out;
    SyntheticOptions options;
    int embedding_dim = 300;
    double spread = 0.5;
    double norm = kPlantedNorm;
};

struct IngestArgs {
    Common common;
    std::string corpus;
    std::string out;
    double min_df = 0.01;
    double max_df = 0.85;
    std::optional<std::string> stopwords;
};

struct TrainArgs {
    Common common;
    std::string bow;
    std::string embeddings;
    std::string out;
    std::optional<int> topics, hidden, epochs, batch_size;
    std::optional<double> lr;
    bool train_rho = false;
    bool strict = false;
    bool quiet = false;
};

struct EvalArgs {
    Common common;
    std::string checkpoint;
    std::string bow;
    int top_n = 10;
    int diversity_top_n = 25;
};

struct SessionArgs {
    Common common;
    std::string checkpoint;
    std::string corpus;
    std::optional<std::string> embeddings;
    std::optional<std::string> log;
};

struct RelabelArgs {
    SessionArgs session;
    int topic = 0;
    std::string word;
    std::optional<double> lambda;
    std::string mode = "convex";
    std::optional<double> delta;
    int neighbors = 10;
};

struct ReportArgs {
    SessionArgs session;
    std::string query;
    int top_n = 5;
    std::string format = "text";
};

struct ServeArgs {
    SessionArgs session;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<std::string> audit_dir;
};

void add_session_args(CLI::App* cmd, SessionArgs& a)
{
    add_common(cmd, a.common);
    cmd->add_option("--checkpoint", a.checkpoint, "Trained model checkpoint")->required();
    cmd->add_option("--corpus", a.corpus, "Corpus JSONL")->required();
    cmd->add_option("--embeddings", a.embeddings, "Pretrained vectors for labels and similarity");
}

std::shared_ptr<TopicContext const> open_context(SessionArgs const& a, EtmModel& model_out)
{
    auto model = std::make_shared<EtmModel>(load_model(a.checkpoint));
    auto cfg = base_config(a.common, model->config);
    model->config.lambda_default = cfg.lambda_default;
    model_out = *model;
    std::optional<EmbeddingTable> table;
    if (a.embeddings) {
        table = load_embeddings(*a.embeddings);
    }
    return make_topic_context(model, load_corpus(a.corpus), std::move(table));
}

int cmd_synth(SynthArgs const& a, std::ostream& out)
{
    auto opts = a.options;
    opts.seed = base_config(a.common).seed;
    auto corpus = generate_synthetic_corpus(opts);
    std::filesystem::create_directories(a.out);
    std::filesystem::path dir(a.out);
    save_corpus(corpus.documents, dir / "corpus.jsonl");
    save_embeddings(planted_embeddings(corpus, a.embedding_dim, a.spread, opts.seed + 1, a.norm), dir / "embeddings.txt");
    std::ofstream truth(dir / "truth.tsv");
    for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
        truth << corpus.documents[d].id << '\t' << corpus.planted_topic[d] << '\n';
    }
    out << "documents: " << corpus.documents.size() << '\n' << "words: " << corpus.words.size() << '\n';
    return 0;
}

int cmd_ingest(IngestArgs const& a, std::ostream& out)
{
    (void)base_config(a.common);
    auto docs = load_corpus(a.corpus);
    VocabularyOptions opts;
    opts.min_df = a.min_df;
    opts.max_df = a.max_df;
    StopwordSet stop = a.stopwords ? load_stopwords(*a.stopwords) : default_stopwords();
    opts.stopwords = stop;
    tokenize_documents(docs, stop);
    auto vocab = build_vocabulary(docs, opts);
    auto bow = to_bow(docs, vocab);
    save_bow(bow, a.out);
    out << "documents: " << bow.rows.size() << '\n' << "vocabulary: " << vocab.size() << '\n';
    return 0;
}

int cmd_train(TrainArgs const& a, std::ostream& out)
{
    auto cfg = base_config(a.common);
    if (a.topics) cfg.topics = *a.topics;
    if (a.hidden) cfg.hidden = *a.hidden;
    if (a.epochs) cfg.epochs = *a.epochs;
    if (a.batch_size) cfg.batch_size = *a.batch_size;
    if (a.lr) cfg.lr = *a.lr;
    if (a.train_rho) cfg.train_rho = true;

    auto bow = load_bow(a.bow);
    auto table = load_embeddings(a.embeddings);
    cfg.embedding_dim = table.dim();
    MissingPolicy policy;
    policy.kind = a.strict ? MissingPolicy::Kind::error : MissingPolicy::Kind::random_init;
    policy.seed = cfg.seed;
    auto rho = align_to_vocabulary(table, bow.vocab, policy);
    auto model = train(bow, std::move(rho), cfg, [&](int epoch, double loss) {
        if (!a.quiet) {
            out << "epoch " << epoch << " loss " << format_double(loss) << '\n';
        }
    });
    save_model(model, a.out);
    out << "checkpoint: " << a.out << '\n';
    return 0;
}

int cmd_eval(EvalArgs const& a, std::ostream& out)
{
    (void)base_config(a.common);
    auto model = load_model(a.checkpoint);
    auto bow = load_bow(a.bow);
    CooccurrenceStats stats(bow);
    auto coherence = topic_coherence(model.beta, model.vocab.words(), stats, a.top_n);
    double diversity = topic_diversity(model.beta, model.vocab.words(), a.diversity_top_n);
    out << "coherence: " << format_double(coherence.mean) << '\n';
    out << "diversity: " << format_double(diversity) << '\n';
    for (std::size_t k = 0; k < coherence.per_topic.size(); ++k) {
        out << "topic " << k << ": coherence=" << format_double(coherence.per_topic[k]) << " words=";
        auto words = top_words(row_span(model.beta, static_cast<Eigen::Index>(k)), a.top_n, model.vocab.words());
        for (std::size_t i = 0; i < words.size(); ++i) {
            out << (i ? "," : "") << words[i];
        }
        out << '\n';
    }
    return 0;
}

int cmd_relabel(RelabelArgs const& a, std::ostream& out)
{
    EtmModel model;
    auto context = open_context(a.session, model);
    Workbench bench(context);
    if (a.session.log) {
        bench.replay(load_log(*a.session.log));
    }
    RelabelRequest r;
    r.topic_id = a.topic;
    r.label_word = a.word;
    r.lambda = a.lambda.value_or(model.config.lambda_default);
    r.mode = parse_relabel_mode(a.mode);
    r.delta = a.delta;
    r.neighbor_count = a.neighbors;
    auto rec = bench.relabel(r);
    if (a.session.log) {
        append_log(*a.session.log, bench.log().back());
    }
    out << to_json(rec).dump() << '\n';
    return 0;
}

int cmd_report(ReportArgs const& a, std::ostream& out)
{
    EtmModel model;
    auto context = open_context(a.session, model);
    Workbench bench(context);
    Bm25Index index(context->documents);
    if (a.session.log) {
        bench.replay(load_log(*a.session.log));
    }
    auto report = ranking_report(a.query, bench.topic_states(*bench.initial()), bench.topic_states(*bench.current()),
                                 index, a.top_n);
    if (a.format == "json") {
        out << to_json(report).dump() << '\n';
    } else {
        out << render_report(report);
    }
    return 0;
}

int cmd_serve(ServeArgs const& a, std::ostream& out)
{
    EtmModel model;
    auto context = open_context(a.session, model);
    ServiceOptions opts;
    if (a.audit_dir) {
        opts.audit_dir = *a.audit_dir;
    }
    Service service(context, opts);
    out << "listening on " << a.host << ':' << a.port << std::endl;
    serve(service, a.host, a.port);
    return 0;
}

}  // namespace

int run_cli(std::vector<std::string> const& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Interactive embedded topic modeling"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Generate a planted-topic corpus with embeddings");
    add_common(c_synth, synth.common);
    c_synth->add_option("--out", synth.out, "Output directory")->required();
    c_synth->add_option("--topics", synth.options.topics);
    c_synth->add_option("--vocab-size", synth.options.vocab_size);
    c_synth->add_option("--docs", synth.options.docs);
    c_synth->add_option("--doc-length", synth.options.doc_len);
    c_synth->add_option("--concentration", synth.options.concentration);
    c_synth->add_option("--embedding-dim", synth.embedding_dim);
    c_synth->add_option("--spread", synth.spread);
    c_synth->add_option("--norm", synth.norm, "Length scale of the generated word vectors");

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Tokenize a corpus and write bag-of-words files");
    add_common(c_ingest, ingest.common);
    c_ingest->add_option("--corpus", ingest.corpus, "Corpus JSONL")->required();
    c_ingest->add_option("--out", ingest.out, "Output prefix (.vocab, .bow)")->required();
    c_ingest->add_option("--min-df", ingest.min_df);
    c_ingest->add_option("--max-df", ingest.max_df);
    c_ingest->add_option("--stopwords", ingest.stopwords);

    TrainArgs tr;
    auto* c_train = app.add_subcommand("train", "Train a model and write a checkpoint");
    add_common(c_train, tr.common);
    c_train->add_option("--bow", tr.bow, "Bag-of-words prefix")->required();
    c_train->add_option("--embeddings", tr.embeddings, "Word vectors")->required();
    c_train->add_option("--out", tr.out, "Checkpoint path")->required();
    c_train->add_option("--topics", tr.topics);
    c_train->add_option("--hidden", tr.hidden);
    c_train->add_option("--epochs", tr.epochs);
    c_train->add_option("--batch-size", tr.batch_size);
    c_train->add_option("--lr", tr.lr);
    c_train->add_flag("--train-rho", tr.train_rho);
    c_train->add_flag("--strict-vocab", tr.strict, "Fail on words missing from the embeddings");
    c_train->add_flag("--quiet", tr.quiet);

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "Coherence and diversity of a checkpoint");
    add_common(c_eval, ev.common);
    c_eval->add_option("--checkpoint", ev.checkpoint)->required();
    c_eval->add_option("--bow", ev.bow, "Reference bag-of-words prefix")->required();
    c_eval->add_option("--top-n", ev.top_n);
    c_eval->add_option("--diversity-top-n", ev.diversity_top_n);

    RelabelArgs rl;
    auto* c_relabel = app.add_subcommand("relabel", "Apply one relabel after replaying a log");
    add_session_args(c_relabel, rl.session);
    c_relabel->add_option("--log", rl.session.log, "Update log (replayed, then appended)");
    c_relabel->add_option("--topic", rl.topic)->required();
    c_relabel->add_option("--word", rl.word)->required();
    c_relabel->add_option("--lambda", rl.lambda);
    c_relabel->add_option("--mode", rl.mode);
    c_relabel->add_option("--delta", rl.delta);
    c_relabel->add_option("--neighbors", rl.neighbors);

    ReportArgs rp;
    auto* c_report = app.add_subcommand("report", "Before/after BM25 report for a query");
    add_session_args(c_report, rp.session);
    c_report->add_option("--log", rp.session.log, "Update log to replay");
    c_report->add_option("--query", rp.query)->required();
    c_report->add_option("--top-n", rp.top_n);
    c_report->add_option("--format", rp.format)->check(CLI::IsMember({"text", "json"}));

    ServeArgs sv;
    auto* c_serve = app.add_subcommand("serve", "Run the HTTP service");
    add_session_args(c_serve, sv.session);
    c_serve->add_option("--host", sv.host);
    c_serve->add_option("--port", sv.port);
    c_serve->add_option("--audit-dir", sv.audit_dir, "Directory for per-session update logs");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (CLI::ParseError const& e) {
        return app.exit(e, out, err);
    }

    try {
        if (c_synth->parsed()) return cmd_synth(synth, out);
        if (c_ingest->parsed()) return cmd_ingest(ingest, out);
        if (c_train->parsed()) return cmd_train(tr, out);
        if (c_eval->parsed()) return cmd_eval(ev, out);
        if (c_relabel->parsed()) return cmd_relabel(rl, out);
        if (c_report->parsed()) return cmd_report(rp, out);
        if (c_serve->parsed()) return cmd_serve(sv, out);
    } catch (std::exception const& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace intopic
