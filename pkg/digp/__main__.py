from digp.main import main

main()
