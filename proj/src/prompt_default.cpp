#include "graphs3/prompt.hpp"

namespace graphs3 {

std::string_view default_prompt_template() {
    static constexpr std::string_view text = R"PROMPT(You are an intelligent agent skilled in exploring Knowledge Graphs, with strong reasoning abilities. Your task is to perform question answering over a Knowledge Graph by gradually exploring it. You should start from the entities mentioned in the question and explore the graph step by step until you gather enough information to answer the question.

Your task follows these steps:

1. Understand the Question

2. Analyze the Action History and Current Graph State

3. Choose the Next Action** from the following options:

"Explore Entity": Explore all triples directly connected to a given entity in the Knowledge Graph.     
   
"Choose Relation": Select the triple(s) from the explored information that are most relevant to the question.  
   
Attention: Only the triples included in the "Objects" field of the "Choose Relation" step will be retained in the future "Current Graph State". So You must filter and retain the information useful for answering the question or for further exploration.   
    
"Finish": Choose this action when you believe you have gathered sufficient information to answer the question. Your final answers should be included in the "Objects" field.
   
4. Select the Objects: Depending on the action, provide the relevant entity or triple(s).  
Attention: All objects must come from the "Entities in Question" or the current "Current Graph State". Do not create new entities or relations. 
   
If the action is "Explore Entity",
"Objects": ["EntityA", "EntityB"]

If the action is "Choose Relation",
"Objects": ["(Subject1, Relation1, Object1)", "(Subject2, Relation2, Object2)"]
 
If the action is "Finish",
"Objects": ["Answer1", "Answer2"]

5. Output your response in JSON format, and include a **detailed thought process explaining your reasoning at this step.

---
Question:
{question}

Entities in Question:
{entities}

Current Graph State:
{graph_state}

Action History:
{history}

---

Please respond using the following format:

Thought Process:  
<Provide a step-by-step analysis>

Action Decision:
```json
{{
  "Action": "<The type of action you are taking: 'Explore Entity' | 'Choose Relation' | 'Finish'>",
  "Objects": [<The entities or triples>]
}}
)PROMPT";
    return text;
}

}  // namespace graphs3
