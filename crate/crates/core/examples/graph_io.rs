//! Built-in graph families and the two file formats (edge list and JSON).
//!
//! `cargo run --example graph_io`

use psilab::Graph;

fn main() -> psilab::Result<()> {
    let g = Graph::torus(3, 3)?;
    let text = g.to_edge_list();
    println!("{}", text.lines().take(4).collect::<Vec<_>>().join("\n"));
    assert_eq!(Graph::parse_any(&text)?, g);

    let json = g.to_json();
    assert_eq!(Graph::parse_any(&json)?, g);
    println!("json: {}…", &json[..40]);

    let q3 = Graph::named("hypercube3")?;
    println!("Q3: n = {}, regular {:?}, diameter {:?}", q3.vertex_count(), q3.is_regular(), q3.diameter());
    println!("ball(0, 1) = {:?}", q3.ball(0, 1).as_slice());

    match Graph::parse_edge_list("0 1\n1 1\n") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
