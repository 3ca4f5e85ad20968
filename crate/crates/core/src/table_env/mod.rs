//! Synthetic tables, templated questions with gold programs, and the exact
//! answer oracle.

mod episode;
mod program;
mod query;
mod table;
mod value;

pub use episode::{generate_episode, EnvSpec, Episode, OpMix, Range};
pub use program::{evaluate_program, GoldProgram, GoldRead, OpKind, Program};
pub use query::{bias_draw, generate_query, generate_query_with_bias, Query, QueryShape};
pub use table::{generate_table, CellLayout, CellRef, SuperHeader, Table, TableSpec, MAX_COLS, MAX_ROWS};
pub use value::{Answer, CellValue, Num, ParseNumError};
