fn main() {
    println!("{}", ecgmamba_core::probe());
}
