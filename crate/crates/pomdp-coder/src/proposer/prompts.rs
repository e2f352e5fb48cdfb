//! Prompt text for program proposal, refinement and direct action selection.

use std::fmt::Write;

use pomdp_core::DomainSchema;
use pps::ComponentKind;

use super::{ProposalRequest, ProposeError, RequestKind};

struct Slots {
    what_to_model: &'static str,
    model_input: &'static str,
    model_output: &'static str,
}

fn slots(kind: ComponentKind) -> Slots {
    match kind {
        ComponentKind::Initial => Slots {
            what_to_model: "initial state distribution",
            model_input: "on the input of (empty_state)",
            model_output: "(state)",
        },
        ComponentKind::Transition => Slots {
            what_to_model: "transition distribution",
            model_input: "on the inputs of (state, action)",
            model_output: "(new_state)",
        },
        ComponentKind::Observation => Slots {
            what_to_model: "observation distribution",
            model_input: "on the inputs of (state, action, empty_obs)",
            model_output: "(obs)",
        },
        ComponentKind::Reward => Slots {
            what_to_model: "reward function",
            model_input: "on the inputs of (state, action, next_state)",
            model_output: "(reward, done)",
        },
    }
}

/// Docstring template for one component, with the schema's record names.
pub fn function_template(kind: ComponentKind, schema: &DomainSchema) -> String {
    let st = &schema.state.name;
    let ob = &schema.observation.name;
    match kind {
        ComponentKind::Initial => format!(
            "def initial_func(empty_state):\n    \"\"\"\n    Input:\n        empty_state ({st}): An empty state with only the walls filled into the grid\n    Returns:\n        state ({st}): the initial state of the environment\n    \"\"\"\n    raise NotImplementedError\n"
        ),
        ComponentKind::Transition => format!(
            "def transition_func(state, action):\n    \"\"\"\n    Args:\n        state ({st}): the state of the environment\n        action (int): action to be taken in state `state`\n    Returns:\n        new_state ({st}): the new state of the environment\n    \"\"\"\n    raise NotImplementedError\n"
        ),
        ComponentKind::Observation => format!(
            "def observation_func(state, action, empty_obs):\n    \"\"\"\n    Args:\n        state ({st}): the state of the environment\n        action (int): the previous action that was taken\n        empty_obs ({ob}): an empty observation that needs to be filled and returned\n    Returns:\n        obs ({ob}): observation of the agent\n    \"\"\"\n    raise NotImplementedError\n"
        ),
        ComponentKind::Reward => format!(
            "def reward_func(state, action, next_state):\n    \"\"\"\n    Args:\n        state ({st}): the state of the environment\n        action (int): the action to be executed\n        next_state ({st}): the next state of the environment\n    Returns:\n        reward (float): the reward of that state\n        done (bool): whether the episode is done\n    \"\"\"\n    raise NotImplementedError\n"
        ),
    }
}

const DSL_NOTES: &str = "Randomness is written as sample(\"site_name\", Bernoulli(p)), sample(\"site_name\", Categorical([p0, p1, ...])) \
or sample(\"site_name\", UniformInt(lo, hi)) with both bounds inclusive. Loops must be `for i in range(...)` with constant bounds; \
while loops, recursion, imports, classes and lambdas are not available.";

/// The initial proposal prompt.
pub fn build_initial_prompt(req: &ProposalRequest) -> Result<String, ProposeError> {
    let RequestKind::Initial { examples } = &req.kind else {
        return Err(ProposeError::WrongRequestKind("initial"));
    };
    let s = &req.schema;
    let sl = slots(req.component);
    let name = req.component.func_name();
    let mut out = String::new();
    let _ = write!(
        out,
        "You are a robot exploring its environment. \n\n\
         Environment Description: {desc}\n\
         Goal Description: {goal}\n\n\
         Your goal is to model the {what}. \n\
         You need to implement the python code to model the world, as seen in the provided experiences. \n\
         Please follow the template to implement the code. \n\
         The code needs to be directly runnable {input} and return {output}. \n\n\n\
         Below are a few samples from the environment distribution. These are only samples from a larger distribution that your should model.\n\n\
         {exp}\n\n\
         Here is the template for the {name} function. Please implement\n\
         the {name} function following the template. The code needs to be directly\n\
         runnable.\n\n\
         ```\n{api}\n{template}```\n\n\
         Explain what you believe is the {what} in english.\n\
         Additionally, please implement code to model the logic of the world. Please implement the \n\
         code following the template. Only output the definition for ` {name} `. \n\
         You must implement the ` {name} ` function.\n\
         Create any helper function inside the scope of ` {name} `. \n\
         Do not create any helper function outside the scope of ` {name} `.\n\
         Do not output examples usage. \n\
         Do not create any new classes.\n\
         Do not rewrite existing classes. \n\
         Do not import any new modules from anywhere.\n\
         Do not overfit to the specific samples.\n\
         Put the ` {name} ` function in a python code block.\n\
         Implement any randomness with `sample`\n\
         {notes}\n",
        desc = s.description,
        goal = s.goal_description,
        what = sl.what_to_model,
        input = sl.model_input,
        output = sl.model_output,
        exp = examples.join("\n"),
        api = s.code_api(),
        template = req.template_source,
        notes = DSL_NOTES,
    );
    Ok(out)
}

/// The refinement prompt. `error_block` must be nonempty.
pub fn build_refinement_prompt(req: &ProposalRequest) -> Result<String, ProposeError> {
    let RequestKind::Refinement { prev, error_block } = &req.kind else {
        return Err(ProposeError::WrongRequestKind("refinement"));
    };
    if error_block.trim().is_empty() {
        return Err(ProposeError::EmptyErrors);
    }
    let s = &req.schema;
    let sl = slots(req.component);
    let name = req.component.func_name();
    let mut out = String::new();
    let _ = write!(
        out,
        "You are a robot exploring its environment. \n\n\
         {desc}\n\n\
         Your goal is to model {what} of the world in python. \n\n\
         You have tried it before and came up with one partially correct solution, but it is not perfect. \n\n\
         The observed distribution disagrees with the generated model in several cases.\n\
         You need to improve your code to come closer to the true distribution.\n\n\
         Environment Description: {desc}\n\
         Goal Description: {goal}\n\n\
         Here is a solution you came up with before. \n\n\
         ```\n{api}\n{code}\n```\n\n\n\
         {experiences}\n\n\
         Explain what you believe is {what} in english, then improve your code to better model the true distribution.\n\n\
         Please implement the code for the following the template. \n\
         You must implement the ` {name} ` function. \n\n\
         The code needs to be directly runnable {input} and return {output}. \n\n\
         Do not output examples. \n\
         Do not create any new classes. \n\
         Do not rewrite existing classes.\n\
         Do not import any new modules from anywhere.\n\
         Do not list out specific indices that overfit to the examples, but include ranges.\n\
         Put the ` {name} ` function in a python code block.\n\
         Implement any randomness with `sample`\n\
         {notes}\n",
        desc = s.description,
        goal = s.goal_description,
        what = sl.what_to_model,
        api = s.code_api(),
        code = prev.pretty().trim_end(),
        experiences = error_block.trim_end(),
        name = name,
        input = sl.model_input,
        output = sl.model_output,
        notes = DSL_NOTES,
    );
    Ok(out)
}

/// One condition's entry in the refinement experience block.
pub fn render_error_group(condition: &str, dataset_outcomes: &[String], model_outcomes: &[String]) -> String {
    let mut out = String::from("Here are some samples from the real world that were impossible under your model\n");
    for o in dataset_outcomes {
        let _ = writeln!(out, "{condition} -> {o}");
    }
    out.push_str("\nAnd here are some samples from your code under the same conditions\n");
    for o in model_outcomes {
        let _ = writeln!(out, "{condition} -> {o}");
    }
    out
}

/// Prompt for the baseline that asks for the next action directly.
pub fn build_direct_prompt(schema: &DomainSchema, demos: &[String], history: &[String]) -> String {
    format!(
        "You are a robot exploring its environment. \n\n\
         {desc}\n\n\
         Your goal is to predict the next best action to take to reach the goal and maximize reward.\n\n\
         Here is the template for the reward function. Please implement\n\
         the reward function following the template. The code needs to be directly\n\
         runnable on the inputs of (state) and return (reward) in python.\n\n\
         ```\n{api}```\n\n\
         Here are some example rollouts from the environment\n\n\
         {exp}\n\n\
         Here is the current episode history for the task that you are doing right now\n\n\
         {current}\n\n\
         Output the next aciton in the form where you fill in <action-here> with the action that is best for reaching the goal and maximizing reward.\n\
         For example, your code will look like this:\n\n\
         ```\n\
         next_action:int = 0\n\
         ```\n\n\
         The action should be an integer with no additional code. Explan your reasoning in one sentence.\n",
        desc = schema.description,
        api = schema.code_api(),
        exp = demos.join("\n\n"),
        current = history.join("\n"),
    )
}

/// Fenced code blocks in order of appearance. An unterminated final fence
/// still yields a block.
pub fn code_blocks(text: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current: Option<String> = None;
    for line in text.lines() {
        if line.trim_start().starts_with("```") {
            match current.take() {
                Some(b) => blocks.push(b),
                None => current = Some(String::new()),
            }
        } else if let Some(b) = current.as_mut() {
            b.push_str(line);
            b.push('\n');
        }
    }
    if let Some(b) = current {
        if !b.trim().is_empty() {
            blocks.push(b);
        }
    }
    blocks
}

/// Reads `next_action:int = k` from the last code block.
pub fn extract_action(text: &str) -> Option<usize> {
    let re = regex::Regex::new(r"next_action\s*(?::\s*int)?\s*=\s*(\d+)").expect("static regex");
    let block = code_blocks(text).pop()?;
    re.captures(&block)?.get(1)?.as_str().parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_block_wins_and_language_tags_are_dropped() {
        let text = "first\n```python\na = 1\n```\nthen\n```\nb = 2\n```\n";
        assert_eq!(code_blocks(text), vec!["a = 1\n".to_string(), "b = 2\n".to_string()]);
        assert!(code_blocks("no fences here").is_empty());
    }

    #[test]
    fn action_extraction() {
        assert_eq!(extract_action("```\nnext_action:int = 2\n```"), Some(2));
        assert_eq!(extract_action("I pick\n```python\nnext_action = 1\n```"), Some(1));
        assert_eq!(extract_action("next_action:int = 2"), None);
        assert_eq!(extract_action("```\nprint(3)\n```"), None);
    }
}
