//! Render the built-in prompts and parse model replies by hand.
//!
//!     cargo run --example prompt_templates

use chronos::llm::{extract_answer, parse_analysis, parse_quad_lines, TemplateId, TemplateSet};
use chronos::store::TimeWindow;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let templates = TemplateSet::builtin();
    let question = "Who was the world’s richest person on Jan 28, 2024?";
    let prompt = templates.render(
        TemplateId::P1,
        &[("question", question), ("window", "Reference date: 2025-10-31\nDefault window: 2024-01-01 to 2025-10-31")],
    )?;
    println!("{prompt}\n");

    let reply = "```analysis\nentities: World’s Richest Person\nquery: Who was the world’s richest person?\nstart: 2024-01-28\nend: 2024-01-28\n```";
    let knowledge = TimeWindow::parse("2024-01-01", "2025-10-31")?;
    let a = parse_analysis(reply, question, &knowledge)?;
    println!("parsed: {:?} / {:?} / {}", a.entities, a.time_agnostic_query, a.window);

    let reply = "Events:\n- Oracle stock price | surged to | USD 328 | 2025-09-10\nnot a fact\nFOLLOW-UP: Oracle stock price September 2025";
    let lines = parse_quad_lines(reply);
    println!("quads {:?}\nfollow-up {:?}", lines.quads, lines.follow_up);

    println!("answer {:?}", extract_answer("Reasoning...\nANSWER: Bernard Arnault"));
    for id in TemplateId::ALL {
        println!("{id}: placeholders {:?}", templates.get(id).placeholders());
    }
    Ok(())
}
