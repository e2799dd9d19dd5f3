"""Linear algebra, chain complexes and Morse data."""
