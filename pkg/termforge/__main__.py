from termforge.cli import main

main()
