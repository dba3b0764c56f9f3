//! Model-judged signals: completion clients, prompt templates and response
//! parsing.

pub mod client;
pub mod json;
pub mod prompts;
pub mod signals;

pub use client::{
    prompt_hash, ClientError, CompletionClient, CompletionParams, HttpClient, HttpConfig, MockClient, MockScript,
};
pub use json::{extract_sql_block, parse_json_block, JsonBlockError};
pub use prompts::{format_template, render_db_description, PromptContext, PromptTemplate};
pub use signals::{run_llm_signal, run_llm_signals, LlmMode, LlmSettings, SelfCheckMode};
