#include "graphs3/prompt.hpp"

#include "graphs3/text.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace graphs3 {

PromptTemplate::PromptTemplate() : text_(default_prompt_template()) {}

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {}

PromptTemplate PromptTemplate::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open prompt template: " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return PromptTemplate(os.str());
}

std::string PromptTemplate::render(const PromptFields& fields) const {
    std::string out;
    out.reserve(text_.size() + fields.graph_state.size() + fields.history.size() + 256);
    const std::string_view text(text_);
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if ((c == '{' || c == '}') && i + 1 < text.size() && text[i + 1] == c) {
            out.push_back(c);
            i += 2;
            continue;
        }
        if (c == '{') {
            const auto close = text.find('}', i);
            if (close != std::string_view::npos) {
                const auto key = text.substr(i + 1, close - i - 1);
                const std::string* value = nullptr;
                if (key == "question") value = &fields.question;
                else if (key == "entities") value = &fields.entities;
                else if (key == "graph_state") value = &fields.graph_state;
                else if (key == "history") value = &fields.history;
                if (value) {
                    out += *value;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(c);
        ++i;
    }
    return out;
}

namespace {

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) out.push_back('\n');
        out += lines[i];
    }
    return out;
}

}  // namespace

PromptFields prompt_fields(const TextualGraph& graph, const AgentState& state) {
    PromptFields fields;
    fields.question = state.query.question;
    fields.entities = python_list_repr(state.query.question_entities);
    fields.graph_state = join_lines(render_triples(graph, graph_view(state)));
    fields.history = join_lines(history_lines(state));
    return fields;
}

std::string serialize_state(const TextualGraph& graph, const AgentState& state, const PromptTemplate& prompt) {
    return prompt.render(prompt_fields(graph, state));
}

std::string answer_prompt(std::string_view question, const std::vector<std::string>& triples) {
    std::string out =
        "Answer the question using only the knowledge graph triples below. "
        "Reply with a JSON list of answer strings and nothing else, for example [\"Answer1\", \"Answer2\"]. "
        "Reply [] if the triples do not contain the answer.\n\nTriples:\n";
    for (const auto& t : triples) {
        out += t;
        out.push_back('\n');
    }
    out += "\nQuestion: ";
    out += question;
    out += "\nAnswers:";
    return out;
}

}  // namespace graphs3
