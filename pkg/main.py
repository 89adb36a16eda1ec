from src.frontend.cli import main

if __name__ == "__main__":
    main()
