//! Reverse-mode differentiation of a small attention-style expression.

use hagnn::tensor::{Matrix, Tape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut tape = Tape::new();
    let x = tape.leaf(Matrix::from_rows(&[vec![1.0, -0.5], vec![0.25, 2.0], vec![-1.0, 0.0]])?)?;
    let w = tape.leaf(Matrix::from_rows(&[vec![0.3, -0.2], vec![0.1, 0.4]])?)?;
    let b = tape.leaf(Matrix::row_vector(&[0.05, -0.05]))?;
    let h = tape.linear(x, w, b)?;
    let h = tape.tanh(h)?;
    let weights = tape.softmax_rows(h)?;
    let y = tape.mul(weights, h)?;
    let loss = tape.sum(y)?;
    tape.backward(loss)?;
    println!("loss {:.6}", tape.value(loss).item());
    for (name, v) in [("x", x), ("w", w), ("b", b)] {
        println!("d loss / d {name} = {:?}", tape.grad(v).map(|g| g.as_slice().to_vec()));
    }
    Ok(())
}
