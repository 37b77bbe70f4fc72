#pragma once

#include "graphs3/environment.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace graphs3 {

// The interactive-retrieval prompt with {question}, {entities},
// {graph_state} and {history} placeholders. "{{" and "}}" render as single
// braces.
std::string_view default_prompt_template();

struct PromptFields {
    std::string question;
    std::string entities;
    std::string graph_state;
    std::string history;
};

class PromptTemplate {
public:
    PromptTemplate();
    explicit PromptTemplate(std::string text);

    static PromptTemplate from_file(const std::filesystem::path& path);

    const std::string& text() const noexcept { return text_; }
    std::string render(const PromptFields& fields) const;

private:
    std::string text_;
};

PromptFields prompt_fields(const TextualGraph& graph, const AgentState& state);

// I(s_t): byte-identical for equal states.
std::string serialize_state(const TextualGraph& graph, const AgentState& state,
                            const PromptTemplate& prompt = PromptTemplate{});

// Prompt for producing answers from (question, evidence triples).
std::string answer_prompt(std::string_view question, const std::vector<std::string>& triples);

}  // namespace graphs3
