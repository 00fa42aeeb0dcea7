from bmn.cli import main

main()
