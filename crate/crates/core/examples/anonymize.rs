//! Restricts a world to three constants and prints every anonymization of
//! the resulting fragment.

use std::sync::Arc;

use anyhow::Result;
use nmln::relational::{isomorphic, restrict_named, Anonymizer, Signature, World};

fn main() -> Result<()> {
    let sig = Arc::new(Signature::new(
        ["anna", "bob", "carl", "dana"],
        [("sm", 1), ("fr", 2)],
    )?);
    let atoms = [
        sig.atom("sm", &["anna"])?,
        sig.atom("fr", &["anna", "bob"])?,
        sig.atom("fr", &["bob", "anna"])?,
        sig.atom("fr", &["bob", "carl"])?,
        sig.atom("sm", &["dana"])?,
        sig.atom("fr", &["dana", "bob"])?,
    ];
    let world = World::from_atoms(sig.clone(), &atoms)?;

    let frag = restrict_named(&world, &["anna", "bob", "carl"])?;
    println!("fragment on {{anna, bob, carl}}:");
    for a in frag.true_atoms() {
        println!("  {}", sig.display_atom(&a));
    }

    let anon = Anonymizer::new(&sig, 3);
    println!("\ncode layout:");
    let layout = anon.layout();
    let names: Vec<String> = (0..layout.len())
        .map(|j| {
            let (p, slots) = layout.entry(j);
            let args: Vec<String> = slots.iter().map(|s| format!("x{}", s + 1)).collect();
            format!("{}({})", sig.predicates()[p].name, args.join(","))
        })
        .collect();
    println!("  {}", names.join(" "));

    println!("\n{} anonymizations:", anon.num_perms());
    for code in anon.anonymize(&frag) {
        let slots: Vec<String> = code
            .inverse()
            .iter()
            .map(|&c| sig.constants()[c].clone())
            .collect();
        let bits: String = code.to_vec().iter().map(|b| char::from(b'0' + b)).collect();
        println!("  x = ({:<16}) {bits}", slots.join(", "));
        assert_eq!(code.decode(&sig), frag);
    }

    let other = restrict_named(&world, &["bob", "carl", "dana"])?;
    println!(
        "\n{{anna, bob, carl}} isomorphic to {{bob, carl, dana}}: {}",
        isomorphic(&frag, &other)?
    );
    Ok(())
}
